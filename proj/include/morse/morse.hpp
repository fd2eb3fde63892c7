#pragma once

#include "morse/corpus_io.hpp"
#include "morse/evaluation.hpp"
#include "morse/rules.hpp"
#include "morse/scoring.hpp"
#include "morse/segmenter.hpp"
#include "morse/synth.hpp"
#include "morse/tuning.hpp"
