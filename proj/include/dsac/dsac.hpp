#pragma once

#include "dsac/checkpoint.hpp"
#include "dsac/critic.hpp"
#include "dsac/envs.hpp"
#include "dsac/errors.hpp"
#include "dsac/graph.hpp"
#include "dsac/indexing.hpp"
#include "dsac/mdp.hpp"
#include "dsac/oracle.hpp"
#include "dsac/policy.hpp"
#include "dsac/rng.hpp"
#include "dsac/sampling.hpp"
#include "dsac/schedule.hpp"
#include "dsac/trainer.hpp"
#include "dsac/utility.hpp"
