#pragma once

#include "exsd/core.hpp"
#include "exsd/dynamics.hpp"
#include "exsd/optimizer.hpp"
#include "exsd/estimate.hpp"
#include "exsd/simulate.hpp"
#include "exsd/diagnostics.hpp"
#include "exsd/signature.hpp"
#include "exsd/io.hpp"
#include "exsd/scenarios.hpp"
