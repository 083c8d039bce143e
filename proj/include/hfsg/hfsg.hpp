#pragma once

#include "hfsg/anchor2d.hpp"
#include "hfsg/assignment.hpp"
#include "hfsg/associate.hpp"
#include "hfsg/config.hpp"
#include "hfsg/dot.hpp"
#include "hfsg/edgeopt.hpp"
#include "hfsg/engine.hpp"
#include "hfsg/error.hpp"
#include "hfsg/eval.hpp"
#include "hfsg/geometry.hpp"
#include "hfsg/hierarchy.hpp"
#include "hfsg/io.hpp"
#include "hfsg/mask.hpp"
#include "hfsg/rng.hpp"
#include "hfsg/serialize.hpp"
#include "hfsg/synth.hpp"
#include "hfsg/types.hpp"
#include "hfsg/validate.hpp"
