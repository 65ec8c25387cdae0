"""jointobs: joint physical/virtual observation decision engine and harness."""

from .aog import (
    Graph,
    OccupationChannel,
    OccupationProfile,
    ParseTree,
    TerminalState,
    build_default_aog,
    load_graph,
    prune,
    vote_occupation,
)
from .config import EngineConfig, default_config, load_config
from .datamanager import AlignedSnapshot, DataManager, SensorSlot, SlotStatus
from .decision import (
    NO_ACTION,
    ActionCommand,
    ActionDecision,
    ActuatorChannel,
    ActuatorRegistry,
    Conflict,
    DecisionFactors,
    Disruption,
    MockActuator,
    decide,
    detect_conflict,
    dispatch,
)
from .harness import (
    AccuracyMatrix,
    DecisionRecord,
    LearningTrajectory,
    accuracy,
    run_episode,
    run_learning,
    run_matrix,
)
from .observation import (
    SENSOR_GROUPS,
    ActivityClass,
    ActivityMap,
    ConfigError,
    DeviceEnvironment,
    Fact,
    ObservationCategory,
    PhysioNeed,
    PhysioState,
    PhysioThresholds,
    PoseLabel,
    Registry,
    SensorGroup,
    SensorReading,
    custom_group,
    map_activity,
    physio_flags,
    update_physio,
)
from .personalization import (
    FeedbackSign,
    PreferenceStore,
    SimulatedUser,
    action_probability,
    feedback,
    sigmoid,
    simulated_feedback,
)
from .scenarios import (
    DISRUPTION_IDS,
    OCCUPATION_IDS,
    Scenario,
    build_cell_scenario,
    build_test_set,
    load_scenario,
)

__version__ = "0.1.0"
