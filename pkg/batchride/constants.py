DEFAULT_CAPACITY = 6  # incumbent seats

# pmf switches to log-space above this mean
LOG_SPACE_MU = 30.0

FEASIBILITY_SLACK = 1e-12
CEILING_SLACK = 1e-9
BOUNDARY_TOLERANCE = 1e-12  # |lhs - rhs| below this is reported as 'boundary'

ROOT_XTOL = 1e-14
ROOT_MAXITER = 400
LAMBDA_ROOT_FLOOR = 1e-9
LAMBDA_ROOT_CEILING = 1e9
LAMBDA_SCAN_POINTS = 160

MU_STAR_BRACKET = (0.5, 2.0)
MU_DAGGER_BRACKET = (0.1, 5.0)

SIGN_CONVENTIONS = ('positive', 'paper_C_negative')
MIDROUTE_FORMS = ('linear', 'thinned')
SIM_VARIANTS = ('aggregate_min', 'sequential_thinned')
BINDING_ORDER = ('profit', 'demand', 'capacity')

SIM_BLOCK_SIZE = 4096
DEFAULT_SEED = 20240501

TABLE_B_AXIS = (0.10, 0.25, 0.50, 1.00, 2.00)
TABLE_B_THRESHOLDS = (3, 4, 5)
TABLE_C_THRESHOLDS = (1, 2, 3, 4, 5)
TABLE_C_MU_GRID = tuple(round(0.1 * i, 1) for i in range(1, 51))

FIGURE2_DEFAULTS = {
    'arrival_rate': 1.0,
    'travel_time': 0.33,
    'w_bar': 0.5,
    'p_incumbent': 1.0,
    'op_cost': 0.0,
}
# observed field window for the product arrival_rate * travel_time
CALIBRATION_WINDOW = (0.33, 0.66)

CSV_FLOAT_FORMAT = '%.10g'
OUTPUT_DIR_ENV = 'BATCHRIDE_OUTPUT_DIR'

EXIT_IO = 3
