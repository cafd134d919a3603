#pragma once

// Umbrella header.

#include "condinf/chi_squared.hpp"
#include "condinf/config.hpp"
#include "condinf/dgp.hpp"
#include "condinf/errors.hpp"
#include "condinf/estimators.hpp"
#include "condinf/gci.hpp"
#include "condinf/linalg.hpp"
#include "condinf/mc.hpp"
#include "condinf/parallel.hpp"
#include "condinf/report.hpp"
#include "condinf/rng.hpp"
#include "condinf/spec_tests.hpp"
#include "condinf/version.hpp"
