#pragma once

#include "lsparcom/evaluate.hpp"
#include "lsparcom/fft_conv.hpp"
#include "lsparcom/image.hpp"
#include "lsparcom/io.hpp"
#include "lsparcom/model.hpp"
#include "lsparcom/pipeline.hpp"
#include "lsparcom/simulate.hpp"
#include "lsparcom/solver.hpp"
#include "lsparcom/stats.hpp"
#include "lsparcom/training.hpp"
#include "lsparcom/unfolded.hpp"
