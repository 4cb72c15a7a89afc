#ifndef ONCOPROG_ONCOPROG_HPP
#define ONCOPROG_ONCOPROG_HPP

#include "oncoprog/adam.hpp"
#include "oncoprog/checkpoint.hpp"
#include "oncoprog/cohort.hpp"
#include "oncoprog/drugrec.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/layers.hpp"
#include "oncoprog/matrix.hpp"
#include "oncoprog/model.hpp"
#include "oncoprog/pipeline.hpp"
#include "oncoprog/preprocess.hpp"
#include "oncoprog/progression.hpp"
#include "oncoprog/rng.hpp"
#include "oncoprog/roc.hpp"
#include "oncoprog/synth.hpp"
#include "oncoprog/train.hpp"
#include "oncoprog/tsv.hpp"

#endif  // ONCOPROG_ONCOPROG_HPP
