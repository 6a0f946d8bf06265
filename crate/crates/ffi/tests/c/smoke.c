#include <math.h>
#include <stdio.h>
#include <string.h>

#include "skewdyn.h"

#define CHECK(cond)                                             \
    do {                                                        \
        if (!(cond)) {                                          \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                           \
        }                                                       \
    } while (0)

int main(void) {
    SdMap *map = NULL;
    CHECK(sd_map_new("logistic", 0.0, &map) == SD_STATUS_OK);

    double y = 0.0;
    CHECK(sd_map_eval(map, 0.25, &y) == SD_STATUS_OK && y == 0.75);

    SdBranch b;
    CHECK(sd_track_branch(map, 0.25, 2, &b) == SD_STATUS_OK);
    CHECK(fabs(b.t_lo - (2.0 - sqrt(2.0)) / 4.0) < 1e-9);
    CHECK(fabs(b.t_hi - 0.5) < 1e-9);

    double ftle = 0.0;
    CHECK(sd_ftle(map, 0.3, 100000, &ftle) == SD_STATUS_OK);
    CHECK(fabs(ftle - log(2.0)) < 0.02);

    CHECK(sd_ftle(map, 0.5, 10, &ftle) == SD_STATUS_COMPUTATION);
    char msg[256];
    CHECK(sd_last_error_message(msg, sizeof msg) > 0);
    CHECK(strstr(msg, "critical") != NULL);
    sd_map_free(map);

    SdSkew *skew = NULL;
    CHECK(sd_skew_viana_default(&skew) == SD_STATUS_OK);
    double t = 0.0, x = 0.0;
    CHECK(sd_skew_step(skew, 0.1, 0.3, &t, &x) == SD_STATUS_OK);
    sd_skew_free(skew);

    printf("ok %s\n", sd_version());
    return 0;
}
