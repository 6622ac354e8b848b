#pragma once

#include "resp/classify/batching.hpp"
#include "resp/classify/model.hpp"
#include "resp/classify/train.hpp"
#include "resp/classify/triplet.hpp"
