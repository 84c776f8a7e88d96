#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "steady_state.hpp"
#include "pdh.hpp"
#include "spectra.hpp"
#include "thermal.hpp"
#include "io.hpp"
#include "config.hpp"
