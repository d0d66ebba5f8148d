#pragma once

#include "bsiv.hpp"
#include "config.hpp"
#include "data.hpp"
#include "equiconf.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "latent_unconf.hpp"
#include "models.hpp"
#include "nuisance.hpp"
#include "oracle.hpp"
#include "proximal.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "robust_if.hpp"
#include "simgen.hpp"
#include "strategy.hpp"
#include "worlds.hpp"
