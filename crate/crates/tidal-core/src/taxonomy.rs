//! The closed application-class label space.
//!
//! 27 semantic classes plus `Unknown`. The declaration order is the
//! taxonomy order used for deterministic tie-breaking in classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! application_classes {
    ($(($variant:ident, $label:literal)),+ $(,)?) => {
        /// One application class recovered from provisioning metadata.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case")]
        pub enum ApplicationClass {
            $($variant),+
        }

        impl ApplicationClass {
            /// All members in taxonomy order, `Unknown` last.
            pub const ALL: &'static [ApplicationClass] = &[$(ApplicationClass::$variant),+];

            /// Stable kebab-case label used in every on-disk format.
            pub fn label(self) -> &'static str {
                match self {
                    $(ApplicationClass::$variant => $label),+
                }
            }

            /// Parses a kebab-case label.
            pub fn parse(label: &str) -> Result<ApplicationClass> {
                match label {
                    $($label => Ok(ApplicationClass::$variant),)+
                    other => Err(Error::data(format!("unknown application class label '{other}'"))),
                }
            }
        }
    };
}

application_classes! {
    (InfraNode, "infra-node"),
    (Database, "database"),
    (Gaming, "gaming"),
    (InfraMessageQueue, "infra-message-queue"),
    (DevTestEnv, "dev-test-env"),
    (MediaStreaming, "media-video-streaming"),
    (ComputeSimulation, "compute-simulation"),
    (InfraLogging, "infra-logging-monitoring"),
    (DataCollection, "data-collection"),
    (OfficeSystem, "office-system"),
    (GenericAutoscaling, "generic-autoscaling"),
    (InfraCoordination, "infra-coordination"),
    (AiMl, "ai-ml"),
    (IotSaasPlatform, "iot-saas-platform"),
    (CorpWebsite, "corp-website"),
    (Education, "education"),
    (FinancePayment, "finance-payment"),
    (InfraJumpbox, "infra-jumpbox"),
    (MediaNews, "media-news"),
    (InfraCache, "infra-cache"),
    (EcommerceRetail, "ecommerce-retail"),
    (Community, "community"),
    (Travel, "travel"),
    (GovPublicService, "gov-public-service"),
    (LogisticsMobility, "logistics-mobility"),
    (Delivery, "delivery"),
    (InfraCloudFunction, "infra-cloud-function"),
    (Unknown, "unknown"),
}

impl ApplicationClass {
    /// The 27 semantic classes, excluding `Unknown`.
    pub fn semantic() -> impl Iterator<Item = ApplicationClass> {
        Self::ALL.iter().copied().filter(|c| *c != ApplicationClass::Unknown)
    }

    /// Position in taxonomy order; lower wins classification ties.
    pub fn taxonomy_rank(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl std::fmt::Display for ApplicationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
