#pragma once

#include "sfpme/errors.hpp"
#include "sfpme/grid.hpp"
#include "sfpme/fft.hpp"
#include "sfpme/spectral.hpp"
#include "sfpme/kernel.hpp"
#include "sfpme/rng.hpp"
#include "sfpme/noise.hpp"
#include "sfpme/mass_record.hpp"
#include "sfpme/solver.hpp"
#include "sfpme/stats.hpp"
#include "sfpme/analysis.hpp"
#include "sfpme/io.hpp"
#include "sfpme/config.hpp"
#include "sfpme/verify.hpp"
#include "sfpme/app.hpp"
