#pragma once

#include "resp/metrics/quality.hpp"
#include "resp/metrics/scores.hpp"
#include "resp/metrics/stats.hpp"
