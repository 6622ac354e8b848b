#pragma once

#include "resp/grad/adam.hpp"
#include "resp/grad/checkpoint.hpp"
#include "resp/grad/gradcheck.hpp"
#include "resp/grad/ops.hpp"
#include "resp/grad/params.hpp"
#include "resp/grad/tensor.hpp"
#include "resp/grad/var.hpp"
