#pragma once

#include "v2hg/autodiff.hpp"
#include "v2hg/battery_model.hpp"
#include "v2hg/config.hpp"
#include "v2hg/curve.hpp"
#include "v2hg/data_io.hpp"
#include "v2hg/engine.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/forecaster.hpp"
#include "v2hg/ini.hpp"
#include "v2hg/interior_point.hpp"
#include "v2hg/model_io.hpp"
#include "v2hg/optimizer.hpp"
#include "v2hg/oracle.hpp"
#include "v2hg/parameter_file.hpp"
#include "v2hg/predictors.hpp"
#include "v2hg/reporting.hpp"
#include "v2hg/sweep.hpp"
#include "v2hg/time_series.hpp"
#include "v2hg/trips.hpp"
#include "v2hg/verification.hpp"
