#pragma once

#include "gravsim/errors.hpp"
#include "gravsim/hilbert.hpp"
#include "gravsim/branch.hpp"
#include "gravsim/oracles.hpp"
#include "gravsim/fisher.hpp"
#include "gravsim/lindblad.hpp"
#include "gravsim/harness.hpp"
