#pragma once

#include "epsos/builtins.hpp"
#include "epsos/equivalence.hpp"

// Umbrella header: the workbench for De Simone languages with successors.
