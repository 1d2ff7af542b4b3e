#include <math.h>
#include <stdio.h>

#include "trapspec.h"

int main(void) {
    TrapspecLandscape *landscape = NULL;
    TrapspecSpectrum *spectrum = NULL;
    double rates[3] = {0.2, 0.5, 0.9};
    double eig[3];
    double pi = 0.0;
    char msg[256];

    if (trapspec_landscape_from_rates(rates, 3, &landscape) != TRAPSPEC_STATUS_OK) return 1;
    if (trapspec_spectrum_compute(landscape, 1e-14, &spectrum) != TRAPSPEC_STATUS_OK) return 2;
    if (trapspec_spectrum_eigenvalues(spectrum, eig, 3) != TRAPSPEC_STATUS_OK) return 3;
    if (!(eig[0] < 0.2 && eig[1] > 0.2 && eig[1] < 0.5 && eig[2] > 0.5 && eig[2] < 0.9)) return 4;
    if (trapspec_pi(spectrum, 0.0, 1.0, &pi) != TRAPSPEC_STATUS_OK || fabs(pi - 1.0) > 1e-12) return 5;
    if (trapspec_spectrum_eigenvalues(spectrum, eig, 2) != TRAPSPEC_STATUS_BUFFER_TOO_SMALL) return 6;
    if (trapspec_last_error_message(msg, sizeof msg) == 0) return 7;
    trapspec_spectrum_free(spectrum);
    trapspec_landscape_free(landscape);
    printf("ok %s\n", trapspec_version());
    return 0;
}
