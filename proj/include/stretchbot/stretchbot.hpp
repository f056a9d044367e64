#pragma once

// Everything except the HTTP pieces (service.hpp, net/), which pull in
// cpp-httplib and OpenSSL.

#include "stretchbot/affect.hpp"
#include "stretchbot/commands.hpp"
#include "stretchbot/config.hpp"
#include "stretchbot/context.hpp"
#include "stretchbot/digest.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/events.hpp"
#include "stretchbot/generators.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/live.hpp"
#include "stretchbot/objects.hpp"
#include "stretchbot/pose.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/replay.hpp"
#include "stretchbot/routine.hpp"
#include "stretchbot/routine_script.hpp"
#include "stretchbot/scenario.hpp"
#include "stretchbot/session.hpp"
#include "stretchbot/text.hpp"
#include "stretchbot/verifier.hpp"
