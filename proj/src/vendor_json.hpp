#pragma once

// nlohmann/json emits deprecation noise under -Wall on some toolchains;
// funnel the include through one place.
#if defined(__GNUC__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-declarations"
#endif
#include "json.hpp"
#if defined(__GNUC__)
#pragma GCC diagnostic pop
#endif
