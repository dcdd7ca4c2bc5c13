#pragma once

#include "dualsprt/analysis.hpp"
#include "dualsprt/channel.hpp"
#include "dualsprt/errors.hpp"
#include "dualsprt/fusion.hpp"
#include "dualsprt/local_detector.hpp"
#include "dualsprt/montecarlo.hpp"
#include "dualsprt/scenario_file.hpp"
#include "dualsprt/stats.hpp"
#include "dualsprt/workflow.hpp"
