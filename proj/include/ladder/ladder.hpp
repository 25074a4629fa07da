#pragma once

#include "ladder/bench.hpp"
#include "ladder/deferred.hpp"
#include "ladder/error.hpp"
#include "ladder/expr.hpp"
#include "ladder/forward.hpp"
#include "ladder/gradient.hpp"
#include "ladder/optim.hpp"
#include "ladder/plp.hpp"
#include "ladder/reverse.hpp"
#include "ladder/sparse_gradient.hpp"
#include "ladder/spll.hpp"
#include "ladder/symbolic.hpp"
#include "ladder/text.hpp"
