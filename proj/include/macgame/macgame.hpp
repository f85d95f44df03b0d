#pragma once

#include "macgame/batch.hpp"
#include "macgame/dynamics.hpp"
#include "macgame/equilibrium.hpp"
#include "macgame/errors.hpp"
#include "macgame/game.hpp"
#include "macgame/graph.hpp"
#include "macgame/io.hpp"
#include "macgame/payoff.hpp"
#include "macgame/simplex.hpp"
#include "macgame/structure.hpp"
#include "macgame/verify.hpp"
