#pragma once

#include "ifk/dynamics.hpp"
#include "ifk/index.hpp"
#include "ifk/models.hpp"
#include "ifk/spectra.hpp"
#include "ifk/truncation.hpp"
