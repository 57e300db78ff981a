#pragma once

#include "specenc/basis.hpp"
#include "specenc/core.hpp"
#include "specenc/error.hpp"
#include "specenc/geometry.hpp"
#include "specenc/io.hpp"
#include "specenc/learner.hpp"
#include "specenc/metrics.hpp"
#include "specenc/pipeline.hpp"
#include "specenc/random.hpp"
#include "specenc/spectrum.hpp"
#include "specenc/synthetic.hpp"
