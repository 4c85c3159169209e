#pragma once

#include "bpatch/collapsed.hpp"
#include "bpatch/counts.hpp"
#include "bpatch/data_io.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/evaluate.hpp"
#include "bpatch/generate.hpp"
#include "bpatch/metrics.hpp"
#include "bpatch/model.hpp"
#include "bpatch/predict.hpp"
#include "bpatch/rng.hpp"
#include "bpatch/sampler.hpp"
#include "bpatch/serialize.hpp"
