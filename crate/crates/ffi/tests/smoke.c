#include <stdio.h>
#include <string.h>

#include "flat_tori.h"

int main(void) {
    FtLattice *e8 = NULL;
    if (ft_lattice_parse("E8", &e8) != FT_STATUS_OK) {
        fprintf(stderr, "parse failed: %s\n", ft_last_error());
        return 1;
    }
    uint64_t disc = 0;
    int32_t integral = 0, even = 0;
    uint64_t counts[5] = {0};
    int64_t t[4] = {2, 0, 0, 2};
    uint64_t r = 0;
    if (ft_lattice_discriminant(e8, &disc) != FT_STATUS_OK) return 2;
    if (ft_lattice_predicates(e8, &integral, &even) != FT_STATUS_OK) return 3;
    if (ft_count_by_norm(e8, 4, NULL, counts, 5) != FT_STATUS_OK) return 4;
    if (ft_representation_number(e8, 2, t, NULL, &r) != FT_STATUS_OK) return 5;
    printf("%llu %d %d %llu %llu %llu %llu\n", (unsigned long long)disc, integral, even,
           (unsigned long long)counts[0], (unsigned long long)counts[2], (unsigned long long)counts[4],
           (unsigned long long)r);
    ft_lattice_free(e8);

    FtLattice *bad = NULL;
    if (ft_lattice_parse("E8+Q:3", &bad) != FT_STATUS_PARSE || bad != NULL) return 6;
    if (strstr(ft_last_error(), "Q:3") == NULL) return 7;
    return 0;
}
