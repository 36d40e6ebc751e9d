#pragma once

#include "bicf/dense_matrix.hpp"
#include "bicf/error.hpp"
#include "bicf/harness.hpp"
#include "bicf/ingest.hpp"
#include "bicf/metrics.hpp"
#include "bicf/parallel.hpp"
#include "bicf/recommend.hpp"
#include "bicf/simkernel.hpp"
