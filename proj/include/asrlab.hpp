#pragma once

#include "asrlab/artifacts.hpp"
#include "asrlab/audio.hpp"
#include "asrlab/config.hpp"
#include "asrlab/corpus.hpp"
#include "asrlab/decoder.hpp"
#include "asrlab/error.hpp"
#include "asrlab/eval.hpp"
#include "asrlab/frontend.hpp"
#include "asrlab/ga.hpp"
#include "asrlab/linalg.hpp"
#include "asrlab/mlp.hpp"
#include "asrlab/pipeline.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/serialize.hpp"
#include "asrlab/som.hpp"
