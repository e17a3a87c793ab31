#pragma once

#include "minar/bivariate_poisson.hpp"
#include "minar/catalog.hpp"
#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/estimation.hpp"
#include "minar/experiments.hpp"
#include "minar/forecast.hpp"
#include "minar/granger.hpp"
#include "minar/likelihood.hpp"
#include "minar/math.hpp"
#include "minar/moments.hpp"
#include "minar/optimize.hpp"
#include "minar/parallel.hpp"
#include "minar/random.hpp"
#include "minar/report.hpp"
#include "minar/thinning.hpp"
#include "minar/time.hpp"
