#pragma once

#include "optocav/errors.hpp"
#include "optocav/hilbert.hpp"
#include "optocav/operators.hpp"
#include "optocav/hamiltonians.hpp"
#include "optocav/dynamics.hpp"
#include "optocav/table_io.hpp"
#include "optocav/scenarios.hpp"
