#pragma once

#include "resp/corpus/clip.hpp"
#include "resp/corpus/manifest.hpp"
#include "resp/corpus/mix.hpp"
#include "resp/corpus/provenance.hpp"
#include "resp/corpus/split.hpp"
#include "resp/corpus/synthetic.hpp"
