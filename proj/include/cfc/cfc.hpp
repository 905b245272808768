#pragma once

#include "cfc/a2c.hpp"
#include "cfc/dataset.hpp"
#include "cfc/env.hpp"
#include "cfc/mcts.hpp"
#include "cfc/metrics.hpp"
#include "cfc/net.hpp"
#include "cfc/rng.hpp"
#include "cfc/rules.hpp"
#include "cfc/synthetic.hpp"
