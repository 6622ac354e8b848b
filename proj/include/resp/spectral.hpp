#pragma once

#include "resp/spectral/mel.hpp"
#include "resp/spectral/stft.hpp"
