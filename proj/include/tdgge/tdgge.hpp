#ifndef TDGGE_TDGGE_HPP
#define TDGGE_TDGGE_HPP

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"
#include "tdgge/grid.hpp"
#include "tdgge/strings.hpp"
#include "tdgge/kernels.hpp"
#include "tdgge/blocksolve.hpp"
#include "tdgge/tba_gapped.hpp"
#include "tdgge/ysystem.hpp"
#include "tdgge/ysystem_gapless.hpp"
#include "tdgge/tba_gapless.hpp"
#include "tdgge/observables.hpp"
#include "tdgge/free_fermion.hpp"
#include "tdgge/exact/ops.hpp"
#include "tdgge/exact/circuit.hpp"
#include "tdgge/exact/transfer.hpp"
#include "tdgge/exact/sectors.hpp"

#endif
