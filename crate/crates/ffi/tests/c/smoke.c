#include <math.h>
#include <stdio.h>

#include "riskdyn.h"

int main(int argc, char **argv) {
    if (argc < 2) {
        return 10;
    }
    double data[] = {0.0, 0.0, 0.1, 0.2, 5.0, 5.0, 5.1, 4.9};
    size_t labels[4];
    RiskdynKMeans *model = NULL;
    if (riskdyn_kmeans_fit(data, 4, 2, 2, 3, 7, &model) != RISKDYN_STATUS_OK) {
        return 11;
    }
    if (riskdyn_kmeans_assignments(model, labels, 4) != RISKDYN_STATUS_OK) {
        return 12;
    }
    riskdyn_kmeans_free(model);
    if (labels[0] != 1 || labels[2] != 0) {
        return 13;
    }

    double auc = 0.0;
    double scores[] = {0.1, 0.4, 0.35, 0.8};
    size_t truth[] = {0, 0, 1, 1};
    if (riskdyn_auc(scores, truth, 4, &auc) != RISKDYN_STATUS_OK || fabs(auc - 0.75) > 1e-15) {
        return 14;
    }

    RiskdynDataset *ds = NULL;
    if (riskdyn_dataset_load("/nonexistent.csv", &ds) != RISKDYN_STATUS_DATA || ds != NULL) {
        return 15;
    }
    if (riskdyn_last_error() == NULL) {
        return 16;
    }
    if (riskdyn_dataset_load(argv[1], &ds) != RISKDYN_STATUS_OK) {
        return 17;
    }
    printf("%zu rows, %zu countries\n", riskdyn_dataset_rows(ds), riskdyn_dataset_countries(ds));
    riskdyn_dataset_free(ds);
    return 0;
}
