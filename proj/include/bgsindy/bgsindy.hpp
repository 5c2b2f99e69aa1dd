#ifndef BGSINDY_BGSINDY_HPP
#define BGSINDY_BGSINDY_HPP

#include "bgsindy/baselines.hpp"
#include "bgsindy/benchmarks.hpp"
#include "bgsindy/dataset.hpp"
#include "bgsindy/dataset_io.hpp"
#include "bgsindy/denoise.hpp"
#include "bgsindy/differentiation.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/fft.hpp"
#include "bgsindy/integrate.hpp"
#include "bgsindy/integrators.hpp"
#include "bgsindy/library.hpp"
#include "bgsindy/metrics.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/pipeline.hpp"
#include "bgsindy/pruner.hpp"
#include "bgsindy/regression.hpp"
#include "bgsindy/sampling.hpp"
#include "bgsindy/spectral.hpp"
#include "bgsindy/stencil.hpp"
#include "bgsindy/term.hpp"

#endif // BGSINDY_BGSINDY_HPP
