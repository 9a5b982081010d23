// Convenience include for the whole library.
#pragma once

#include "bytes.hpp"
#include "dht.hpp"
#include "dos_guard.hpp"
#include "hashchain.hpp"
#include "ledger.hpp"
#include "metrics.hpp"
#include "packet.hpp"
#include "protocol.hpp"
#include "result.hpp"
#include "scenario.hpp"
#include "sha256.hpp"
#include "sim.hpp"
#include "types.hpp"
#include "world.hpp"
