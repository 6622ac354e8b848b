#pragma once

#include "resp/signal/filters.hpp"
#include "resp/signal/resample.hpp"
#include "resp/signal/synth.hpp"
#include "resp/signal/wav.hpp"
#include "resp/signal/waveform.hpp"
