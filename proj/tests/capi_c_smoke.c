/* Compile-only check that the public header is consumable from plain C. */
#include "m2oe/m2oe.h"

const char *m2oe_smoke_status_name(void) { return m2oe_status_name(M2OE_OK); }
