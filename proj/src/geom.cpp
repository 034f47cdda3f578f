#include "hwalk/geom.hpp"

// Geometry is header-only; this unit pins it into the library and catches
// missing includes early.
