#include <stdio.h>
#include <string.h>

#include "stackmorse.h"

static const char *SCENARIO =
    "name = \"c_smoke\"\n"
    "ambient_dim = 3\n"
    "constraints = [\"x1^2+x2^2+x3^2-1\"]\n"
    "function = \"x3\"\n"
    "tasks = [\"analyze\"]\n";

int main(void) {
    StackmorseScenario *s = NULL;
    if (stackmorse_scenario_from_toml(SCENARIO, &s) != STACKMORSE_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", stackmorse_last_error());
        return 1;
    }
    StackmorseReport *r = NULL;
    if (stackmorse_run(s, 0, false, 0, &r) != STACKMORSE_STATUS_OK) {
        return 2;
    }
    int64_t poly[4] = {0};
    int64_t n = stackmorse_report_morse_polynomial(r, poly, 4);
    StackmorseOrbit o;
    if (stackmorse_report_orbit(r, 1, &o) != STACKMORSE_STATUS_OK) {
        return 3;
    }
    printf("orbits=%zu poly=%lld,%lld,%lld len=%lld top_index=%u passed=%d\n",
           stackmorse_report_orbit_count(r), (long long)poly[0], (long long)poly[1],
           (long long)poly[2], (long long)n, o.index, stackmorse_report_passed(r));
    stackmorse_report_free(r);
    stackmorse_scenario_free(s);

    StackmorseScenario *bad = NULL;
    StackmorseStatus st = stackmorse_scenario_from_toml("name = ", &bad);
    printf("bad=%d null=%d\n", (int)st, bad == NULL);
    return 0;
}
