#pragma once

#include "ldkit/errors.hpp"
#include "ldkit/subspace.hpp"
#include "ldkit/linear_ld.hpp"
#include "ldkit/field_ld.hpp"
#include "ldkit/dynamics.hpp"
#include "ldkit/systems.hpp"
#include "ldkit/io.hpp"
