#pragma once

#include "resp/enhance/models.hpp"
#include "resp/enhance/segments.hpp"
#include "resp/enhance/spectral_subtract.hpp"
#include "resp/enhance/train.hpp"
