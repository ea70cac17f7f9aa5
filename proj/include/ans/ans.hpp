#pragma once

#include "ans/bandit_core.hpp"
#include "ans/baselines.hpp"
#include "ans/env_sim.hpp"
#include "ans/error.hpp"
#include "ans/harness.hpp"
#include "ans/keyframe.hpp"
#include "ans/model_ingest.hpp"
#include "ans/report.hpp"
#include "ans/scenario.hpp"
#include "ans/sweep.hpp"
