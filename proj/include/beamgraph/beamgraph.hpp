#pragma once

#include "beamgraph/graph.hpp"
#include "beamgraph/quadrature.hpp"
#include "beamgraph/edge_basis.hpp"
#include "beamgraph/spectrum.hpp"
#include "beamgraph/secular.hpp"
#include "beamgraph/fem.hpp"
#include "beamgraph/surgery.hpp"
#include "beamgraph/bounds.hpp"
#include "beamgraph/harness.hpp"
#include "beamgraph/io.hpp"
