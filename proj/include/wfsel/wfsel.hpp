#pragma once

#include "wfsel/core.hpp"
#include "wfsel/random.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/numeric.hpp"
#include "wfsel/density.hpp"
#include "wfsel/composition.hpp"
#include "wfsel/sampler.hpp"
#include "wfsel/inference.hpp"
#include "wfsel/io.hpp"
#include "wfsel/study.hpp"
