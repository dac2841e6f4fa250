#pragma once

#include "pdep/conditional.hpp"
#include "pdep/dataio.hpp"
#include "pdep/error.hpp"
#include "pdep/miner.hpp"
#include "pdep/model.hpp"
#include "pdep/pafd_estimators.hpp"
#include "pdep/pfd_exact.hpp"
#include "pdep/rng.hpp"
#include "pdep/specificity.hpp"
#include "pdep/worlds_oracle.hpp"
