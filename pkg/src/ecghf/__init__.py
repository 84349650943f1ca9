"""High-frequency wavelet features and linear classification of multi-lead ECG."""

from .classifier import (ClassifierModel, Decision, EvaluationReport,
                         PatientSummary, aggregate_patient, classify, evaluate,
                         load_model, save_model, train)
from .discriminant import (ReductionModel, ScatterModel, fit_scatter,
                           fit_scatter_arrays, j1_criterion, project, reduce)
from .errors import (DataFormatError, DomainError, EcghfError,
                     InsufficientDataError, NumericalError)
from .features import (EXTENDED_FEATURE_NAMES, FEATURE_NAMES, FeatureVector,
                       extract_extended_features, extract_features,
                       feature_order_hash, fragment_features, hurst_rs,
                       l1_energy, l2_energy, read_feature_table, relative_l2,
                       shannon_entropy, write_feature_table)
from .signal_io import (CHANNEL_NAMES, LEAD_ORDER, EcgRecord, Fragment,
                        LeadSet, derive_leads, extract_fragments, load_record,
                        write_record)
from .spectral import (Spectrum, dft, hilbert_analytic, inverse_dft,
                       mean_instantaneous_frequency, spectrum_peak)
from .synthgen import SynthSpec, generate_population, synth_record
from .wavelet import (DecompositionTree, WaveletBank, band_of_level, dwt_step,
                      idwt_step, load_bank, reconstruct, reconstruct_component,
                      wavedec)

__version__ = "0.1.0"
