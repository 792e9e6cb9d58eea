#pragma once

#include "nwc/config.hpp"
#include "nwc/errors.hpp"
#include "nwc/eval.hpp"
#include "nwc/grid.hpp"
#include "nwc/ingest.hpp"
#include "nwc/layers.hpp"
#include "nwc/metrics.hpp"
#include "nwc/models.hpp"
#include "nwc/nwc1.hpp"
#include "nwc/params_io.hpp"
#include "nwc/pgm.hpp"
#include "nwc/rng.hpp"
#include "nwc/synthetic.hpp"
#include "nwc/tensor.hpp"
#include "nwc/train.hpp"
