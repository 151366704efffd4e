#include <stdio.h>
#include <math.h>
#include "pfsprior.h"

int main(void) {
    PfsPrior *prior = NULL;
    if (pfs_prior_parse("shp:phi=1,theta=1", &prior) != PFS_STATUS_OK) {
        fprintf(stderr, "%s\n", pfs_last_error_message());
        return 1;
    }
    double lp;
    pfs_log_size_prior(prior, 1, 3, &lp);
    printf("pi(1|3) = %.6f\n", exp(lp));

    PfsPrior *bad = NULL;
    PfsStatus s = pfs_prior_parse("nope", &bad);
    printf("status %d: %s\n", (int)s, pfs_last_error_message());

    pfs_prior_free(prior);
    return 0;
}
