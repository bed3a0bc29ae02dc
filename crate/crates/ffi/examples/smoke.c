/* Build: cc examples/smoke.c -Iinclude -L../../target/release -l:libchromfem_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include "chromfem.h"

int main(void) {
  const char *config =
      "mesh.nx = 16\nmesh.ny = 16\n"
      "dt = 1/8\nT = 1\nboundary.g = mms\n";
  ChromfemSimulation *sim = NULL;
  if (chromfem_simulation_new(config, &sim) != CHROMFEM_STATUS_OK) {
    char msg[256];
    chromfem_last_error(msg, sizeof msg);
    fprintf(stderr, "chromfem: %s\n", msg);
    return 1;
  }
  if (chromfem_simulation_run(sim) != CHROMFEM_STATUS_OK) {
    chromfem_simulation_free(sim);
    return 1;
  }
  ChromfemLedgerRow row;
  chromfem_simulation_ledger_row(sim, &row);
  printf("t = %g  mass = %.6f  min = %.3e\n", row.time, row.total_mass, row.min_nodal);
  chromfem_simulation_free(sim);
  return 0;
}
