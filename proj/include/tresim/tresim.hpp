#pragma once

#include "tresim/random.hpp"
#include "tresim/pk_model.hpp"
#include "tresim/optimizer.hpp"
#include "tresim/bayes.hpp"
#include "tresim/stats.hpp"
#include "tresim/pd_metrics.hpp"
#include "tresim/records.hpp"
#include "tresim/parallel.hpp"
#include "tresim/tre.hpp"
#include "tresim/strategies.hpp"
#include "tresim/summary.hpp"
#include "tresim/config.hpp"
#include "tresim/experiment.hpp"
