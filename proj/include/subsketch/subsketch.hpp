#pragma once

#include "subsketch/caratheodory.hpp"
#include "subsketch/core_model.hpp"
#include "subsketch/experiments.hpp"
#include "subsketch/coreset_engine.hpp"
#include "subsketch/fourier_sketch.hpp"
#include "subsketch/harmonics.hpp"
#include "subsketch/linear_rounding.hpp"
#include "subsketch/merge_reduce.hpp"
#include "subsketch/parallel.hpp"
#include "subsketch/region_sketch.hpp"
#include "subsketch/sensitivity_stream.hpp"
#include "subsketch/serialization.hpp"
#include "subsketch/sphere_geometry.hpp"
#include "subsketch/svm.hpp"
#include "subsketch/tensor_algebra.hpp"
#include "subsketch/types.hpp"
