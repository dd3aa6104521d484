#pragma once

#include "spectroqsim/units.hpp"
#include "spectroqsim/errors.hpp"
#include "spectroqsim/linalg.hpp"
#include "spectroqsim/model.hpp"
#include "spectroqsim/evolve.hpp"
#include "spectroqsim/protocol.hpp"
#include "spectroqsim/pipeline.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/spectra.hpp"
#include "spectroqsim/resources.hpp"
#include "spectroqsim/config.hpp"
#include "spectroqsim/sweep.hpp"
#include "spectroqsim/postprocess.hpp"
#include "spectroqsim/validation.hpp"
