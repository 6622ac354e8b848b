#pragma once

#include "resp/harness/config.hpp"
#include "resp/harness/pipeline.hpp"
#include "resp/harness/report.hpp"
