#pragma once

#include "bridgepath/errors.hpp"
#include "bridgepath/glm.hpp"
#include "bridgepath/grouped.hpp"
#include "bridgepath/io.hpp"
#include "bridgepath/loss.hpp"
#include "bridgepath/numdiff.hpp"
#include "bridgepath/parallel.hpp"
#include "bridgepath/path.hpp"
#include "bridgepath/penalty.hpp"
#include "bridgepath/sde.hpp"
#include "bridgepath/solver.hpp"
#include "bridgepath/spectral.hpp"
#include "bridgepath/svg.hpp"
#include "bridgepath/threshold.hpp"
