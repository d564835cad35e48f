#pragma once

// Umbrella header: the envelope format, the keystore, the three white-box
// decryption schemes and their key-extraction attacks.

#include "ipvault/base64.hpp"
#include "ipvault/crypto.hpp"
#include "ipvault/envelope.hpp"
#include "ipvault/errors.hpp"
#include "ipvault/keystore.hpp"
#include "ipvault/kvfile.hpp"
#include "ipvault/nat.hpp"
#include "ipvault/numtheory.hpp"
#include "ipvault/recovered_key.hpp"
#include "ipvault/report.hpp"
#include "ipvault/rng.hpp"
#include "ipvault/wb_obfcrt.hpp"
#include "ipvault/wb_splitkey.hpp"
#include "ipvault/wb_window.hpp"
#include "ipvault/wbfile.hpp"
