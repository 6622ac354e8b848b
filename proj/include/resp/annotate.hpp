#pragma once

#include "resp/annotate/server.hpp"
#include "resp/annotate/store.hpp"
#include "resp/annotate/study.hpp"
#include "resp/annotate/summary.hpp"
