#pragma once

#include "segue/boosts.hpp"
#include "segue/challenge.hpp"
#include "segue/common.hpp"
#include "segue/dataset.hpp"
#include "segue/ensemble.hpp"
#include "segue/kernels.hpp"
#include "segue/metrics.hpp"
#include "segue/parallel.hpp"
#include "segue/pipeline.hpp"
#include "segue/recommenders.hpp"
#include "segue/sparse.hpp"
#include "segue/stem.hpp"
#include "segue/synth.hpp"
#include "segue/titles.hpp"
