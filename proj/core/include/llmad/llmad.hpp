#pragma once

#include "llmad/backends.hpp"
#include "llmad/baselines.hpp"
#include "llmad/batch.hpp"
#include "llmad/constrain.hpp"
#include "llmad/detector.hpp"
#include "llmad/error.hpp"
#include "llmad/eval.hpp"
#include "llmad/parser.hpp"
#include "llmad/random.hpp"
#include "llmad/serializer.hpp"
#include "llmad/synth.hpp"
